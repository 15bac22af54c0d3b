from ._kpzfit import (
    AccuracyError,
    KernelFamily,
    Model,
    __version__,
    a_pq,
    airy_ai,
    airy_ai_deriv,
    bessel_j,
    height_shift,
    kernel,
    p_critical,
    scaling_constants,
    simulate,
    tw_cdf,
    tw_moments,
    tw_pdf,
)

__all__ = [
    "AccuracyError",
    "KernelFamily",
    "Model",
    "__version__",
    "a_pq",
    "airy_ai",
    "airy_ai_deriv",
    "bessel_j",
    "height_shift",
    "kernel",
    "p_critical",
    "scaling_constants",
    "simulate",
    "tw_cdf",
    "tw_moments",
    "tw_pdf",
]
