from orlicz_heat.cli import main

main()
