# β-FPUT normal-form validity toolkit
