# Necessary file for sphinx-apidoc to find this subpackage
