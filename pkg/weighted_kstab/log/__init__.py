from weighted_kstab.log.log import JsonFormatter, setup_logging

__all__ = [
    "setup_logging",
    "JsonFormatter",
]
