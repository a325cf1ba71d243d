"""Exact laboratory for Edgeworth expansions of sums along inhomogeneous Markov chains."""
from .chain import (ChainSpec, ConditionedChain, EllipticityReport, PinSet, condition_chain,
                    conditional_marginals, covariance, dump_chain, k_step_density, load_chain,
                    marginals, pin_probability, validate_chain)
from .cumulants import CumulantData, cumulants_at_zero, log_mgf_jet, resonant_jet
from .errors import *  # noqa: F401,F403
from .expansion import (GeneralizedExpansion, classical_expansion, cumulants_from_pmf,
                        full_expansion, hermite, q_polynomial, q_value, resonant_contribution,
                        sup_error)
from .jets import Jet, jet_div, jet_exp, jet_log, jet_mul
from .oracle import (SumPmf, char_fn, interval_contribution, interval_quadrature, invert_dft,
                     pinned_sum_pmfs, residue_law, sum_pmf)
from .resonance import (ResonantPoint, interval_partition, period, prokhorov_classify,
                        qv_bracket, residue_profile, resonant_points)
from .rpf import RpfSequence, rpf_triplets, transfer_apply, transfer_dual, verify_rpf

__version__ = "0.1.0"
