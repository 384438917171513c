"""Allow running as python -m multiplier_lab.cli."""
import sys

from multiplier_lab.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
