from .flow import estimate_A_bounds, geodesic_flow, time_average
from .qep import assemble_qep, qep_eigenvalues

__all__ = ["estimate_A_bounds", "geodesic_flow", "time_average", "assemble_qep", "qep_eigenvalues"]
