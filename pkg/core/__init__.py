"""
Data-driven leader-follower synchronization core.
"""
