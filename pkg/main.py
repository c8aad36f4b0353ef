"""datasync command-line entry (python main.py <command> ...)"""

from apps.cli import run

if __name__ == "__main__":
    run()
