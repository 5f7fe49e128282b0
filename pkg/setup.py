import setuptools

with open("requirements.txt") as f:
    requires = f.read().splitlines()

setuptools.setup(
    name="sublaplace",
    version="2026.10.17",
    description="Package to build and evaluate sub-network Laplace approximations",
    long_description="Package to build and evaluate sub-network Laplace approximations",
    long_description_content_type="text",
    packages=setuptools.find_packages(exclude=["tests"]),
    install_requires=requires,
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: linux_x86_64",
    ],
    python_requires=">=3.10",
)
