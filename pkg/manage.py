from tabcanon.cli.main import app as cli

if __name__ == "__main__":
    cli()
