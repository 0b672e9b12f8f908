from leakspice.cli import main

main()
