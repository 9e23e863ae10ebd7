import os
import sys


def main():
    """Main entry point for running codegloss"""
    # Add src directory to Python path
    src_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src')
    sys.path.insert(0, src_path)

    from main import run
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
