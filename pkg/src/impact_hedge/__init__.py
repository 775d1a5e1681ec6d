"""Pricing, quoting and hedging under permanent market impact, with the price
curve given by the indifference curve of a g-expectation liquidity supplier."""

__version__ = "0.1.0"
