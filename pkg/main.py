#!/usr/bin/env python3
"""
Audit runner script that imports from the package structure
"""

import sys

from src.audit_engine.cli import main

if __name__ == "__main__":
    sys.exit(main())
