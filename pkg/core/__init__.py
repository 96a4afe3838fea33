"""Noyaux, fonctions thêta, solveurs de Green et oracle aux différences finies"""
