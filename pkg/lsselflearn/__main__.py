"""Allow running as `python -m lsselflearn`."""

from .cli import main

if __name__ == "__main__":
    main()
