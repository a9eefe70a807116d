"""Entry point for running kato_toolkit as a module."""

from .cli import app

if __name__ == "__main__":
    app()
