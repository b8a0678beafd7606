"""Distance to nonsurjectivity under structured perturbations."""

from .cells import BisectionConfig
from .certificates import DualCertificate, PhiEvaluation, PrimalRankOneCertificate, RankOneCertificate
from .config import AUTO, EXACT, SAMPLED, ModeError, SolverConfig
from .dual import distance_dual, distance_singular, reciprocal_sup, reciprocal_sup_sampled
from .phi import SYSTEM_I, SYSTEM_II, AlternativeResult, DichotomyError, alternative_check, phi, phi_primal, quantity4
from .rank_one import breaks_surjectivity, distance_rank_one_search, general_search
from .verify import DistanceReport, verify_equalities
