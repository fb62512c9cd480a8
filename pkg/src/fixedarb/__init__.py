"""Static arbitrage checks and liability replication for fixed-income cash-flow markets."""

from .arbitrage import (
    ArbitrageVerdict,
    Level,
    check_arbitrage,
    check_law_of_one_price,
    check_strict_arbitrage,
)
from .core import (
    DateGrid,
    DiscountCurve,
    LiabilitySchedule,
    Market,
    Portfolio,
    TolerancePolicy,
    curve_eval,
    curve_vector,
    portfolio_cashflows,
    portfolio_price,
)
from .instruments import (
    CouponBondSpec,
    SwapUniverseSpec,
    bond_row,
    execution_schedule,
    swap_repo_matrices,
    synthetic_market,
)
from .replication import (
    FeasibilityCertificate,
    SuperReplicationResult,
    aggregate_buffer,
    aggregate_forward,
    check_feasibility,
    hedge_quadratic,
    replicate_exact,
    superreplicate,
)

__all__ = [
    "ArbitrageVerdict",
    "CouponBondSpec",
    "DateGrid",
    "DiscountCurve",
    "FeasibilityCertificate",
    "Level",
    "LiabilitySchedule",
    "Market",
    "Portfolio",
    "SuperReplicationResult",
    "SwapUniverseSpec",
    "TolerancePolicy",
    "aggregate_buffer",
    "aggregate_forward",
    "bond_row",
    "check_arbitrage",
    "check_feasibility",
    "check_law_of_one_price",
    "check_strict_arbitrage",
    "curve_eval",
    "curve_vector",
    "execution_schedule",
    "hedge_quadratic",
    "portfolio_cashflows",
    "portfolio_price",
    "replicate_exact",
    "superreplicate",
    "swap_repo_matrices",
    "synthetic_market",
]
