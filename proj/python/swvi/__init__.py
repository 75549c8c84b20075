from ._swvi import *  # noqa: F401,F403
