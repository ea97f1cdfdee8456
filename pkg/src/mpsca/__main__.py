from mpsca.cli import main

main()
