# services/__init__.py
# (비워두셔도 됩니다)
