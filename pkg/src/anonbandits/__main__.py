from anonbandits.cli import main

main()
