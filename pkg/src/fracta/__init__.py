"""fracta: heavy tails, memory and multifractality of NFT collection time series."""

__version__ = "0.1.0"
