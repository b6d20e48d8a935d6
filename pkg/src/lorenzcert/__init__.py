"""Certified computation of the geometric Lorenz attractor and its physical measure."""
from .errors import (BoundViolationError, CertificateError, ConfigError, EscapeError, LorenzError,
                     PreconditionError, ResourceError, SingularLineError)
from .interval import DomainError, Dyadic, Interval, arith, ln, sqrt
from .model import (DEFAULT_MODEL, Box, F_branch, LorenzModel, ModelParams, Side, ValidationReport,
                    f_branch, g_branch, roof, validate)
from .attractor import (AttractorCertificate, CellSet, alpha_step, compute_attractor, hausdorff,
                        hausdorff_points, inner_samples, iterate_An, semidecide_outside_section, stopping_n)
from .flow import (SuspensionPoint, SuspensionTestbed, TubeCover, VectorField, circle_field, poincare_from_flow,
                   return_time, semidecide_outside_flow, suspension_cover)
from .measure import (DensityApprox, Observable, PhysicalMeasure, PlanarMeasure, birkhoff_average,
                      integrate_observable, physical_measure, product_measure, pushforward, roof_integral,
                      section_physical_measure, ulam_acim)

__version__ = "0.1.0"
