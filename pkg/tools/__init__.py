# tools package
