"""Shared percentage arithmetic with explicit rounding modes."""

from __future__ import annotations

from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal


def percent_half_up(correct: int, attempts: int, places: int = 2) -> Decimal:
    """100 * correct / attempts, rounded half-up to ``places`` decimals."""
    quantum = Decimal(1).scaleb(-places)
    if attempts == 0:
        return Decimal(0).quantize(quantum)
    raw = Decimal(correct) * 100 / Decimal(attempts)
    return raw.quantize(quantum, rounding=ROUND_HALF_UP)


def percent_floor(correct: int, attempts: int) -> int:
    """100 * correct / attempts truncated to a whole percent."""
    if attempts == 0:
        return 0
    raw = Decimal(correct) * 100 / Decimal(attempts)
    return int(raw.quantize(Decimal(1), rounding=ROUND_DOWN))


def format_percent(correct: int, attempts: int, places: int = 2) -> str:
    return f"{percent_half_up(correct, attempts, places)}%"
