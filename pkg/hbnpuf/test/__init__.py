""" Specifies which Modules are imported this package is imported and any setup required. """
