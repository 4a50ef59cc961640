from arsrg.cli import main

main(prog_name='arsrg')
