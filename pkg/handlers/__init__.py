# handlers/__init__.py
# click 서브커맨드 모음 (cli.py 에서 등록)
