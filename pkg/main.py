#!/usr/bin/env python3
"""
CachePilot 主启动文件
"""
import sys

from cachepilot.main import main

if __name__ == "__main__":
    sys.exit(main())
