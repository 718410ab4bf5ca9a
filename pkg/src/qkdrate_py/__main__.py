"""Entry point for python -m qkdrate_py."""
import sys

if __name__ == "__main__":
    from qkdrate_py.cli import main

    sys.exit(main())
