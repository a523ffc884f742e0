#!/usr/bin/env python
import sys

from zoomforge.launcher import main

if __name__ == "__main__":
    sys.exit(main())
