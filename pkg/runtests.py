#!/usr/bin/env python
import os
import sys
import unittest

if __name__ == "__main__":
    os.environ["MPCSD_SETTINGS_MODULE"] = "tests.test_settings"

    suite = unittest.defaultTestLoader.discover("tests", top_level_dir=os.path.dirname(os.path.abspath(__file__)))
    result = unittest.TextTestRunner(verbosity=1).run(suite)
    sys.exit(not result.wasSuccessful())
