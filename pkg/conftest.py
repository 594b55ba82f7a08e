import os
import sys

# Make the top-level packages importable without installation
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
