"""
Built-in scenario data
"""
