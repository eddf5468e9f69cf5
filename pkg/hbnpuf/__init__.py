""" Specifies which Modules are imported when a user imports this lib. """
#__all__ = ["hbnpuf"]
