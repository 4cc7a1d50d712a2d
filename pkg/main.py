"""Entry point for the shocklab CLI."""

from shock_stability.main import app

if __name__ == "__main__":
    app()
