"""Exact Novikov homology, gluing complexes and Conley-index inequalities for cell complexes."""

from .complexes import (Cell, CellComplex, ChainComplex, Coefficients, ComplexError, HomologyResult,
                        euler_characteristic, homology, load_complex, quotient_by_subcomplex,
                        relative_homology, smith_normal_form, validate_complex)
from .flows import (CarryReport, Classification, CombinatorialFlow, FlowError, NotGradientLike,
                    carries_cocycle, classify_gradient_like, find_carry_parameters, find_drift_cycle,
                    load_flow, lyapunov_potential, morse_decomposition)
from .gluing import (GluingData, build_deformation_complex, cone_isomorphism_check, glued_complex,
                     load_gluing, reconstruct_and_crosscheck, stage_independence, verify_gluing_identities,
                     zero_evaluation_complex)
from .inequalities import (IndexPolynomial, InequalityReport, MorseData, check_alpha_morse_smale,
                           check_classical_novikov, check_novikov_morse, hyperbolic_index_polynomial,
                           index_polynomial_from_pair, vanishing_check)
from .laurent import Laurent
from .mapping_torus import mapping_torus, suspension_flow
from .twisted import (CellularCocycle, MonodromyRep, admissible_evaluation, build_twisted_complex,
                      evaluated_homology, novikov_numbers)

__version__ = "0.1.0"
