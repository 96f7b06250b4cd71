"""Toolkit for two-layer networks: irreducibility and equivalence decisions,
finite sampling-plan construction, exact relu recovery from samples,
point-set adversaries, and sigmoid/tanh identification checks."""

from .tolerances import DEFAULT_TOL, ToleranceConfig
from .errors import (AdmissibilityError, ConstructionError, DegenerateFitError,
                     HypothesisError, InputError, InvariantError, ParseError,
                     ReconstructionError, RecoveryError, SizeError,
                     ToleranceError, ToolkitError)
from .net_core import (Activation, GroupedReLU, Hyperplane, Neuron, PairedEntry,
                       ShallowNet, SingleEntry, canonical_hyperplane, deserialize,
                       evaluate, evaluate_many, group, make_net, serialize)
from .numerics import AffineFit, affine_fit, rank, rank_by_elimination, solve_least_squares
from .relu_structure import (AdmissibilityReport, EquivalenceCertificate,
                             ReductionWitness, check_admissible, reduce_fully,
                             reduce_once, test_equivalent, test_reducible)
from .relu_sampling import (FeasibleLineSet, LabeledSamples, Line, SamplePlan,
                            build_feasible_lines, build_sample_plan,
                            extract_breakpoints, reconstruct, recover_hyperplanes,
                            sample_values)
from .relu_adversary import AdversarialPair, AdversaryParams, build_pair
from .analytic_id import (AnalyticCanonicalForm, AnalyticSamplePlan,
                          ExpSumExpansion, FullSparkFrame, IdentificationReport,
                          build_analytic_plan, canonicalize_analytic,
                          check_admissible_analytic, check_full_spark,
                          cleared_form_value, exp_sum_expansion,
                          separating_direction, sigmoid_form,
                          test_equivalent_analytic, vandermonde_frame,
                          verify_identification)

__version__ = "0.1.0"
