"""CI tests"""
