"""Trade competitiveness forecasting: NRCA index and Box-Jenkins modelling."""

__version__ = "0.1.0"
