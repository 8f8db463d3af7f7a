import sys

from openadmm.cli import main


# Protected Entry Point is Required for Multiprocessing
if __name__ == '__main__':
    sys.exit(main())
