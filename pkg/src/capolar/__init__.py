"""CRC-aided polar codes with erasure decoding, and finite-blocklength bounds
on the total and undetected error probability."""

__version__ = "0.1.0"
