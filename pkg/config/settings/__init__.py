# Settings package
