# Tests package for Language Learning Tutor
