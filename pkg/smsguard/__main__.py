"""Allow running smsguard as a module: python -m smsguard"""

from .cli import main

if __name__ == "__main__":
    main()
