"""Module entry point: python -m fewmode."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
