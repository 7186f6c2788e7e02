"""Closed-form and Monte Carlo pricing of a digital asset-or-nothing
quanto option on time-changed Levy processes with compound Poisson jumps."""

from .bounds import BoundMode, PriceBounds, auto_orders, bracket_price, make_pricer, put_bounds
from .errors import (BranchError, BudgetExceededError, CombinatorialBlowupError, ConvergenceError,
                     DomainError, PricingError, UnsupportedDependenceError, ValidationError)
from .jumplaw import ConstantJump, DiscreteJump, ExponentialJump, SumLaw
from .mc_oracle import McEstimate, estimate_price, sample_terminal_triple
from .model import (AssetParams, CorrelationBlock, Family, JumpSpec, Linkage, ModelSpec,
                    SubordinatorStructure, TheoremId, expected_s3s2, price_put_from_call,
                    select_theorem, spec_from_json, validate_model)
from .nig_pricing import NigPricer, dc_conditional_nig
from .vg_pricing import VgPricer, dc_conditional

__all__ = [
    "AssetParams", "BoundMode", "BranchError", "BudgetExceededError", "CombinatorialBlowupError",
    "ConstantJump", "ConvergenceError", "CorrelationBlock", "DiscreteJump", "DomainError",
    "ExponentialJump", "Family", "JumpSpec", "Linkage", "McEstimate", "ModelSpec", "NigPricer",
    "PriceBounds", "PricingError", "SubordinatorStructure", "SumLaw", "TheoremId",
    "UnsupportedDependenceError", "ValidationError", "VgPricer", "auto_orders", "bracket_price",
    "dc_conditional", "dc_conditional_nig", "estimate_price", "expected_s3s2", "make_pricer",
    "price_put_from_call", "put_bounds", "sample_terminal_triple", "select_theorem",
    "spec_from_json", "validate_model",
]
