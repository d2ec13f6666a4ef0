"""Hitchin's stable forms, SU(3)- and G2-structures on Lie algebras, and the nearly-parallel flow."""

__version__ = "0.1.0"

from .exterior import Form, FormError, act, contract, e, hodge_star, top_scalar, wedge
from .hitchin import StableClass, StabilityError, classify, complex_structure, deps, eps, hat, omega0, phi0, sigma0
from .lie import JacobiError, LieAlgebra, LieAlgebraError, SalamonParseError, d_ce, parse_salamon
from .su3 import SU3Error, SU3Structure, TorsionClass, TorsionTag, classify_torsion, pi_map, validate
from .g2 import G2Form, lift, nearly_parallel_residual, product_metric, star_psi
from .flow import FlowConfig, FlowMode, FlowState, Trajectory, integrate
from .solutions import cone_family, nearly_kahler_su2su2, sine_cone_family
from .data import data_path

__all__ = [name for name in dir() if not name.startswith("_")]
