import random
from typing import Optional

from ..exchange import Side
from .aa import AA
from .base import AccountingFault, LimitViolation, MarketEvent, Trader, within_limit
from .gdx import GDX
from .params import STRATEGIES, ParamError, ParamTable, StrategyParams, canonical_strategy
from .simple import ZIC, Giveaway, Shaver, gvwy_quote, shvr_quote, zic_quote
from .zip import ZIP

TRADER_CLASSES: dict[str, type[Trader]] = {
    cls.strategy: cls for cls in (AA, GDX, Giveaway, Shaver, ZIC, ZIP)
}


def make_trader(strategy: str, trader_id: str, side: Side, params: Optional[ParamTable] = None,
                rng: Optional[random.Random] = None,
                bounds: tuple[int, int] = (1, 500)) -> Trader:
    name = canonical_strategy(strategy)
    table = params or ParamTable.default()
    return TRADER_CLASSES[name](trader_id, side, table.for_strategy(name), rng, bounds)


__all__ = [
    "AA", "GDX", "Giveaway", "Shaver", "ZIC", "ZIP", "Trader", "MarketEvent",
    "AccountingFault", "LimitViolation", "ParamTable", "ParamError", "StrategyParams",
    "STRATEGIES", "TRADER_CLASSES", "make_trader", "canonical_strategy",
    "gvwy_quote", "shvr_quote", "zic_quote", "within_limit",
]
