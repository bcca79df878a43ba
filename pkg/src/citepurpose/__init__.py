"""Citation purpose classification with hand features, TF-IDF and a bi-LSTM attention encoder."""

__version__ = "0.1.0"
