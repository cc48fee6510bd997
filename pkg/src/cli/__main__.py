from src.cli.main import run

run()
