"""recipetrace: trace generated recipe ingredients and steps to web documents."""

__version__ = "0.1.0"
