from .boyd import NormProbe, opnorm_lower_bound
from .operators import (
    NearEigenvalueError,
    SingularityError,
    damped_resolve,
    damped_resolvent_operator,
    laplace_resolve,
    laplace_resolvent_operator,
)

__all__ = [
    "NormProbe",
    "opnorm_lower_bound",
    "NearEigenvalueError",
    "SingularityError",
    "damped_resolve",
    "damped_resolvent_operator",
    "laplace_resolve",
    "laplace_resolvent_operator",
]
