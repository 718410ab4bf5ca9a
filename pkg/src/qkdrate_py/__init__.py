"""qkdrate: key-rate lower bounds for QKD protocols from mismatched-basis channel statistics."""

__version__ = "0.1.0"

__all__ = [
    "errors",
    "config",
    "qmath",
    "stats",
    "attack",
    "tomography",
    "bound",
    "solver",
    "protocols",
    "fileformat",
    "cli",
]
