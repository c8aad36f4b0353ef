"""
Command-line application: scenario parsing and pipeline stages
"""
