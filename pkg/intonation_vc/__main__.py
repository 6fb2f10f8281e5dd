"""Entry point for ``python -m intonation_vc`` and the ``intonation-vc`` script."""
from intonation_vc.cli import main as cli_main


def main() -> None:
    cli_main()


if __name__ == "__main__":
    main()
