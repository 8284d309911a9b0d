"""
Stancelab - Entry Point
`python -m stancelab` and the `stancelab` console script
"""

from .cli import app


def main():
    """Run the stancelab command-line application"""
    app(prog_name="stancelab")


if __name__ == "__main__":
    main()
