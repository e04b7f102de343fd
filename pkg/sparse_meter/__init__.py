"""Privacy-preserving sparse release of smart meter data."""
import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())
