from cli import cli


def main():
    """Main entry point for the ovfree command line."""
    cli(prog_name="ovfree")


if __name__ == "__main__":
    main()
