""" Unit test suites, one per module. Run with: python -m unittest discover hbnpuf/test """
