"""Near-field source localization: array models, channel simulation, DE and MUSIC localizers."""

# Python version check: 3.11-3.13 (tomllib is required)
import sys


__version__ = "0.1.0"

if sys.version_info < (3, 11) or sys.version_info >= (3, 14):
    print(
        "Warning: Unsupported Python version {ver}, please use 3.11-3.13".format(
            ver=".".join(map(str, sys.version_info))
        )
    )
